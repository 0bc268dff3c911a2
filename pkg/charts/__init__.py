"""Chart building module for rendering traces."""
