"""Command routing module for the rw_integrals CLI."""

from .command_router import CommandRouter, parse_derivative, parse_pairs

__all__ = ['CommandRouter', 'parse_derivative', 'parse_pairs']
