"""Fault tolerant trajectory clustering for sensor-network cluster heads."""
