"""Holomorphic Riemannian space forms and complex metrics on surfaces."""
