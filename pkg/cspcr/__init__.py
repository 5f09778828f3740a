"""
Covariate-shift corrected Pearson chi-squared conditional randomization tests.
"""
__version__ = "0.1.0"
