"""Result file helpers."""
