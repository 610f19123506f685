"""
Test suite for the M2O group authentication simulator
"""
