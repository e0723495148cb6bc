from frappe import _

def get_data():
	return [
		{
			"module_name": "ImmuNeCS",
			"color": "green",
			"icon": "octicon octicon-beaker",
			"type": "module",
			"label": _("ImmuNeCS")
		}
	]
