// Nested counting loops: the inner loop should keep i bounded by 99.
int i;
int j;

void main() {
  i = 0;
  while (i < 100) {
    j = 0;
    while (j < 10) {
      j = j + 1;
    }
    i = i + j;
  }
}
