from setuptools import setup, find_packages

with open("requirements.txt") as f:
	install_requires = [line for line in f.read().strip().split("\n") if line and not line.startswith("#")]

# get version from __version__ variable in immunecs/__init__.py
from immunecs import __version__ as version

setup(
	name="immunecs",
	version=version,
	description="Immune-inspired neural architecture search with network committees",
	author="aakvatech",
	author_email="info@aakvatech.com",
	packages=find_packages(),
	zip_safe=False,
	include_package_data=True,
	install_requires=install_requires,
	entry_points={
		"console_scripts": [
			"immunecs=immunecs.commands:immunecs",
		],
	},
)
