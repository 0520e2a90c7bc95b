# Network engine package
