# Numerical services: spectral models, constants, Stechkin, Solyar
