//! Fine-scale solver with point-particle closure.
