"""
Setup script for ustlab.

Usage:
    pip install -e .
"""

from setuptools import setup

MODULES = [
    'app',
    'config',
    'errors',
    'lattices',
    'graphs',
    'green',
    'transfer',
    'sampler',
    'grassmann',
    'degrees',
    'permutations',
    'cumulants',
    'scaling',
    'storage',
]

setup(
    name='ustlab',
    version='1.0.0',
    description='Exact and Monte Carlo statistics of uniform spanning trees',
    py_modules=MODULES,
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.24.0',
        'scipy>=1.10.0',
        'networkx>=3.0',
        'sympy>=1.12',
    ],
    extras_require={'test': ['pytest>=7.0']},
    entry_points={'console_scripts': ['ustlab = app:main']},
)
