"""Time-share vs fair-share CPU scheduling: simulator and capacity planner."""
