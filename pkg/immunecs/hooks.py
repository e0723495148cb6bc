from . import __version__ as app_version

app_name = "immunecs"
app_title = "ImmuNeCS"
app_publisher = "aakvatech"
app_description = "Immune-inspired neural architecture search with network committees"
app_icon = "octicon octicon-beaker"
app_color = "green"
app_email = "info@aakvatech.com"
app_license = "MIT"

# Installation
# ------------

# after_install = "immunecs.install.after_install"

# Document Events
# ---------------

doc_events = {
    "Immune Search Run": {
        "on_trash": "immunecs.immunecs.doctype.immune_search_run.immune_search_run.delete_run_records"
    }
}

# Scheduled Tasks
# ---------------

scheduler_events = {
    "cron": {
        # Pick up queued search runs every 5 minutes
        "*/5 * * * *": [
            "immunecs.immunecs.tasks.run_processor.process_search_runs"
        ],
    }
}

# User Data Protection
# --------------------

user_data_fields = [
    {
        "doctype": "Immune Search Run",
        "filter_by": "owner",
        "redact_fields": ["config_json"],
        "rename": None
    }
]
