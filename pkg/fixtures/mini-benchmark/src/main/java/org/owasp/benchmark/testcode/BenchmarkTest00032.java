package org.owasp.benchmark.testcode;

import java.io.IOException;

import javax.servlet.ServletException;
import javax.servlet.annotation.WebServlet;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

@WebServlet(value = "/ldapi-00/BenchmarkTest00032")
public class BenchmarkTest00032 extends HttpServlet {

    private static final long serialVersionUID = 1L;

    private final java.util.Properties benchprops =
            org.owasp.benchmark.helpers.Utils.loadBenchmarkProperties();

    @Override
    public void doGet(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        doPost(request, response);
    }

    @Override
    public void doPost(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        response.setContentType("text/html;charset=UTF-8");

        javax.naming.directory.DirContext dirContext = org.owasp.benchmark.helpers.LDAPManager.getDirContext();
        javax.naming.directory.SearchControls searchControls = new javax.naming.directory.SearchControls();
        String preset = benchprops.getProperty("ldap.robot", "carol") + benchprops.getProperty("ldap.division", "delta");
        String ldapQuery = "(uid=" + preset + ")";
        javax.naming.NamingEnumeration<?> entries = dirContext.search("ou=users", ldapQuery, searchControls);
        response.getWriter().println("found=" + entries.hasMore());
    }
}
