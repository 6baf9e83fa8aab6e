// Placeholder main; subcommands are added as the modules land.
int main() { return 0; }
