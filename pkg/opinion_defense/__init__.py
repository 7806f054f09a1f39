"""
Opinion defense toolkit: optimal protection budgets against worst-case source attacks
"""
