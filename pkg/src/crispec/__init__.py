"""Critical spectra of finite metric spaces."""

__version__ = "0.1.0"
