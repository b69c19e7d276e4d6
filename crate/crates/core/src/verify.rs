//! Independent oracles and convergence studies.
