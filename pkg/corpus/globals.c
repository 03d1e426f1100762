// Flow-insensitive global written from two separately analyzed calls;
// the initializer contributes 0, the calls contribute 2 and 3.
global int g = 0;

void f(int b) {
  if (b != 0) {
    g = b + 1;
  } else {
    g = 0 - b - 1;
  }
}

void main() {
  f(1);
  f(2);
}
