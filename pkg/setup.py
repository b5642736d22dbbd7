#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup, find_packages

test_deps = [
    'coverage',
    'hypothesis',
    'pytest',
    'pytest-cov',
    'pytest-xdist',
]

setup(
    name='suqtwist',
    version='0.1.1',
    description='Numerical verification of the unitary twist between the q = 0 and q > 0 '
                'comultiplications of C(SU_q(2)) on truncated Fock windows',
    license='BSD-3-Clause-Clear',
    packages=find_packages(exclude=('tests',)),
    package_data={'suqtwist.schemas': ['*.avsc']},
    include_package_data=True,
    zip_safe=False,
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    install_requires=[
        'avro-python3',
        'iso8601',
        'numpy',
        'pytz',
        'scipy',
    ],
    tests_require=test_deps,
    extras_require={
        'test': test_deps,
    },
    entry_points={
        'console_scripts': [
            'suqtwist = suqtwist.cli.main:main',
        ],
    },
    python_requires='>=3.9',
)
