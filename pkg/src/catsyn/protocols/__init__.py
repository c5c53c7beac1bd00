"""Syndrome-extraction and measurement protocols built on the PCC model."""
