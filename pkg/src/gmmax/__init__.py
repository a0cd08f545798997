"""gmmax: asymptotic predictions and finite-size experiments for
generalized margin maximizers (structured hard-margin classification)."""

__version__ = "0.1.0"
