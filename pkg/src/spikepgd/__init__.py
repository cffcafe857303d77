"""Off-the-grid sparse spike estimation by projected gradient descent."""

__version__ = "0.1.0"
