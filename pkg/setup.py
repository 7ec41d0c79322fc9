from setuptools import setup, find_packages

with open('requirements.txt', 'r') as f:
    required = f.read().splitlines()

setup(
    name='wtpc',
    version='0.1.0',
    packages=find_packages(),
    description='wind turbine power curve models with environmental and dynamic layers',
    license='MIT',
    install_requires=required,
    long_description=open('README.md').read(),
    include_package_data=True,
    entry_points={
        'console_scripts': ['wtpc=wtpc.__main__:cli']
    },
)
