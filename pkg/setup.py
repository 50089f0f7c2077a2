import setuptools


setuptools.setup(
    name='pytorch-qftca',
    version='0.0.1',
    author='Kaiyu Shi',
    author_email='skyisno.1@gmail.com',
    description='A quantum field theory cellular automaton desk simulator in pytorch',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    packages=['qftca'],
    install_requires=['torch>=1.11', 'tqdm', 'dill'],
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
)
