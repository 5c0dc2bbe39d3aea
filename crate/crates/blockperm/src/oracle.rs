//! Brute-force oracles and decomposition verification (stub).
