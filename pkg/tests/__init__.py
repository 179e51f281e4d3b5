"""Tests for qcoh."""
