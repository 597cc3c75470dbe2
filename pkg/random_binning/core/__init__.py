# Core module - spectra, phase diagrams, exponents and simulators
