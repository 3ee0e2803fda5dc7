"""Goal-typed proof strategy graphs with an interactive stepping evaluator."""

__version__ = "0.1.0"
