"""rotsym: numerical mechanisms behind rotational symmetry of translators."""

__version__ = "0.1.0"
