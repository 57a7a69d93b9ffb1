"""
Zero-noise laboratory tests

One module per package module (dynamics, perturbation, transfer, measures,
sampling, diagnostics), test_lab for configuration, drivers, reports and
commands, and test_acceptance for the desk-scale oracle checks.

Set LAB_SLOW_TESTS=1 to include the full experiment runs.
"""
