"""One module per pie-solve subcommand."""
