import importlib.util

# DocType tests and the Frappe surface need a bench site
collect_ignore_glob = []
if importlib.util.find_spec("frappe") is None:
	collect_ignore_glob = [
		"immunecs/immunecs/doctype/*/test_*.py",
		"immunecs/immunecs/tests/test_frappe_*.py",
	]
