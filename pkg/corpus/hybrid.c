// Endless outer loop with a conditional reset: i stays within [1,10]
// inside the inner loop, but only restarting recovers the upper bound.
int i;
int j;

void main() {
  i = 0;
  while (true) {
    i = i + 1;
    j = 0;
    while (j < 10) {
      j = j + 1;
    }
    if (i > 9) {
      i = 0;
    }
  }
}
