// Populated by the variation module.
