"""
Services package: spectral analysis, waterfilling solver, oracles, dynamics and reporting
"""
