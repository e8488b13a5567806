# -*- coding: utf-8 -*-
"""
Packaging for SCoRMLibrary.
"""

from setuptools import setup

from pathlib import Path
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

setup(
    name='SCoRMLibrary',
    version='0.2.0',
    packages=['SCoRMLibrary', 'SCoRMLibrary.tests'],
    package_data={'SCoRMLibrary': ['data/*.csv', 'data/*.json']},
    description='Stochastic cost of remanufacturing: hybrid Pareto return quantities, '
                'regime timing, cost curves and bootstrapped cost paths.',
    long_description=long_description,
    long_description_content_type='text/markdown',
    python_requires='>=3.8',
    install_requires=[
        "numpy >= 1.20.0",
        "scipy >= 1.7.1",
        "pandas >= 1.3.0",
        "tabulate >= 0.8.9",
    ],
    extras_require={
        "mpi": ["mpi4py >= 3.1.3"],
        "test": ["pytest >= 6.2"],
    },
    entry_points={
        "console_scripts": ["scorm = SCoRMLibrary.__main__:main"],
    },
)
