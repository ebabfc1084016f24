#!/usr/bin/env python3
"""
Setup script for rangewalk - Monte Carlo laboratory for random walk range fluctuations.
"""

from setuptools import setup, find_packages
import os

# Read the README file for long description
def read_readme():
    readme_path = os.path.join(os.path.dirname(__file__), 'README.md')
    if os.path.exists(readme_path):
        with open(readme_path, 'r', encoding='utf-8') as f:
            return f.read()
    return "Monte Carlo laboratory for random walk range fluctuations"

setup(
    name="rangewalk",
    version="0.1.0",
    description="Monte Carlo laboratory for random walk range fluctuations",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    author="rangewalk developers",
    author_email="",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22.0",
        "scipy>=1.9.0",
        "statsmodels>=0.13.0",
        "joblib>=1.3.0",
    ],
    extras_require={
        "dev": [
            "pytest>=6.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "rangewalk=rangewalk.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="random walk range self-intersection local time young integral monte carlo",
    package_data={"rangewalk": ["data/tolerances.json"]},
    include_package_data=True,
    zip_safe=False,
)
