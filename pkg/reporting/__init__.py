# Persistence, tables and plots
