"""Pipeline services, one module per stage plus shared artifact handling."""
