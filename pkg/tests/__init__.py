"""Test package for rw_integrals."""
