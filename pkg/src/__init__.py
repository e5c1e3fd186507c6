"""
Source root for the toolkit; `mod`, `utils` and `bin` are imported from here.
"""
