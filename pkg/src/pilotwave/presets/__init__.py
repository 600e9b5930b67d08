"""Bundled .cfg presets; loaded through config.load_preset."""
