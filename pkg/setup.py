#!/usr/bin/python3

from setuptools import setup

setup(name='slcim', version='0.2',
      description='Competitive influence maximization with Subjective Logic opinions',
      author='The slcim authors',
      license='GPLv2+',
      packages=['slcim', 'slcim.communication', 'slcim.utils', 'slcim.rl', 'slcim.harness'],
      python_requires='>=3.8',
      install_requires=['numpy>=1.20', 'scipy>=1.7', 'scikit-learn>=1.0'],
      entry_points={'console_scripts': ['slcim = slcim.harness.cli:main']})
