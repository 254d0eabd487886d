#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  setup.py

<Purpose>
  BUILD SOURCE DISTRIBUTION

  The following shell command generates an mvgf source archive.  The
  packaged source is saved to the 'dist' folder in the current directory.

  $ python3 setup.py sdist


  INSTALLATION OPTIONS

  pip - installing and managing Python packages (recommended):

  # From the root directory of the unpacked archive.
  $ python3 -m pip install .

  # Editable install with the test and lint tools.
  $ python3 -m pip install -r requirements-dev.txt

  Installing puts an 'mvgf' command on the PATH; see 'mvgf --help'.
"""

from setuptools import find_packages, setup

with open("README.md") as file_object:
    long_description = file_object.read()


setup(
    name="mvgf",
    version="0.1.0",  # If updating version, also update it in mvgf/__init__.py
    description="McKean-Vlasov Wasserstein gradient flows on the flat torus",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords="wasserstein gradient flow mckean-vlasov keller-segel particles",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "License :: OSI Approved :: Apache Software License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.12",
        "securesystemslib>=0.20.0,<1.0",
    ],
    packages=find_packages(exclude=["tests"]),
    entry_points={"console_scripts": ["mvgf=mvgf.scripts.cli:main"]},
)
