"""Test suite for radarpercept."""
