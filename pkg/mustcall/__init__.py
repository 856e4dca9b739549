# Must-call resource leak checker package
