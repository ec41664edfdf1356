from cmifl.cli import main

main()
