from setuptools import setup
from setuptools import find_packages

version = '1.0.0'

classifiers = """
Development Status :: 4 - Beta
Environment :: Console
Intended Audience :: Science/Research
License :: OSI Approved :: GNU General Public License v2 or later (GPLv2+)
Operating System :: OS Independent
Programming Language :: Python
Programming Language :: Python :: 3
Programming Language :: Python :: 3.8
Programming Language :: Python :: 3.9
Programming Language :: Python :: 3.10
Programming Language :: Python :: 3.11
Programming Language :: Python :: Implementation :: CPython
Topic :: Scientific/Engineering :: Artificial Intelligence
Topic :: Utilities
""".strip().splitlines()

setup(
    name='lissnas',
    version=version,
    description=(
        'Locality-based iterative search space shrinkage for neural '
        'architecture search, with a suite of search space metrics.'
    ),
    long_description=(
        open('README.rst').read() + "\n" +
        open('CHANGES.rst').read()
    ),
    classifiers=classifiers,
    keywords='nas search-space shrinkage locality',
    license='GPL',
    packages=find_packages('src', exclude=['ez_setup']),
    package_dir={'': 'src'},
    zip_safe=False,
    install_requires=[
        'setuptools>=12',
        'numpy>=1.17',
        'scipy>=1.4',
    ],
    extras_require={
        'plots': [
            'matplotlib>=3.1',
        ],
        'test': [
            'hypothesis',
        ],
    },
    include_package_data=True,
    python_requires='>=3.8',
    entry_points={
        'console_scripts': [
            'lissnas = lissnas.runtime:main',
        ],
        'lissnas.runtime': [
            'analyze-locality = lissnas.runtime:analyze_locality',
            'compare = lissnas.runtime:compare',
            'gen-synthetic = lissnas.runtime:gen_synthetic',
            'report = lissnas.runtime:report',
            'shrink = lissnas.runtime:shrink',
        ],
    },
    test_suite="lissnas.tests.make_suite",
)
