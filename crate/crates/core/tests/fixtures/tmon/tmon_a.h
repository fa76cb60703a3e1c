void tmon_init(void);
int tmon_step(void);
