# Subcommand implementations
