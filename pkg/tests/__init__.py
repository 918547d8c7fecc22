"""
simhammer test suites.

One module per resource, plus the end-to-end acceptance suite.
"""
