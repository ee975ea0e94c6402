"""Time-domain direct sampling for locating small dielectric scatterers."""

__version__ = "0.1.0"
