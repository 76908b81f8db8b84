"""Length-flexible polar codes: asymmetric, shortened/punctured and multi-kernel."""
__version__ = "0.1.0"
