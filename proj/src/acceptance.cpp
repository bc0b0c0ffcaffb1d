// Populated by the acceptance runner.
