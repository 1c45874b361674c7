"""Optional compiled kernels; importing this package must never be required."""
