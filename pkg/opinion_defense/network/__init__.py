"""
Network package: influence systems, graphs, generators and file loaders
"""
