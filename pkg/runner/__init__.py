# Experiment execution
