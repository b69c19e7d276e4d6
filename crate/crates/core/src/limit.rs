//! Homogenized (limit) problem solvers.
