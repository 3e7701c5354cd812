"""Class groups of prime-conductor abelian fields and their capitulation
in the minimal cyclotomic field."""

__version__ = "0.1.0"
