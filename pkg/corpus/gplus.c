// Self-incrementing global: terminates only when the global outranks
// the assignment point, i.e. when the initializer is analyzed first.
global int g = 0;

void main() {
  g = g + 1;
}
