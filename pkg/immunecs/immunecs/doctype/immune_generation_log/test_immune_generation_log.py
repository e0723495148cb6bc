# Copyright (c) 2026, aakvatech and Contributors
# See license.txt

import frappe
from frappe.tests.utils import FrappeTestCase

from immunecs.immunecs.doctype.immune_search_run.test_immune_search_run import make_run


class TestImmuneGenerationLog(FrappeTestCase):
	def test_mean_above_best_is_rejected(self):
		run = make_run()
		log = frappe.get_doc({
			"doctype": "Immune Generation Log",
			"naming_series": "GEN-.YYYY.-.MM.-.#####",
			"search_run": run.name,
			"generation": 1,
			"event_type": "generation",
			"mean_affinity": 0.8,
			"best_affinity": 0.6,
		})
		self.assertRaises(frappe.ValidationError, log.insert, ignore_permissions=True)
