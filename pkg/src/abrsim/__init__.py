"""TCP over ATM ABR worst-case buffer simulator."""
