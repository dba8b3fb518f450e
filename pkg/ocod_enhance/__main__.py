from ocod_enhance.main import run

run()
